//! Pullback metric of the representative map against `K⁻¹`.
//!
//! `G − K⁻¹ = NᵀN` is positive semidefinite; its fibre part `N` does not
//! see the flow direction, and vanishes outright in the kernel regime.

use geoflow::geometry::metric_gap;
use geoflow::{integrate, Dataset, FlowConfig, Model, Params, RegulariserSpec};

fn main() -> geoflow::Result<()> {
    let data = Dataset::scalar(&[1.0], &[1.0])?;
    let flow = FlowConfig {
        step_size: 0.01,
        max_time: 50.0,
        ..FlowConfig::default()
    };
    for (model, theta0) in [(Model::BilinearToy, [2.0, 0.1]), (Model::LinearToy, [0.2, -0.4])] {
        let theta0 = Params::from_vec(theta0.to_vec());
        let run = integrate(&model, &data, &theta0, &RegulariserSpec::none(theta0.clone()), 0.0, &flow)?;
        println!("{} toy", model.name());
        let n = run.steps.len();
        for i in (1..=5).map(|k| k * n / 6) {
            let rep = metric_gap(&model, &data, &run, i)?;
            println!(
                "  c = {:.6}  G = {:.6e}  K⁻¹ = {:.6e}  NᵀN = {:.3e}  min eig(G − K⁻¹) = {:.3e}  |Nċ|/|ċ| = {:.3e}",
                rep.c[0],
                rep.g[(0, 0)],
                rep.k_inv[(0, 0)],
                rep.n_gram[(0, 0)],
                rep.psd_residual,
                rep.velocity_leak.unwrap_or(f64::NAN)
            );
        }
    }
    Ok(())
}
