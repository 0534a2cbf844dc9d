//! Endpoints of the bilinear toy `f = θ₁θ₂x` under every regulariser.
//!
//! Standard and anchored ridge settle away from the ridgeless limit θ*;
//! arc and geodesic ridge end on the ridgeless path.
//!
//! ```text
//! cargo run --release --example figure2
//! ```

use std::sync::Arc;

use geoflow::energy::{EnergyMode, EnergyTable, GeodesicRidge};
use geoflow::{integrate, Dataset, FlowConfig, Model, Params, RegulariserSpec};

fn main() -> geoflow::Result<()> {
    let model = Model::BilinearToy;
    let data = Dataset::scalar(&[1.0], &[1.0])?;
    let theta0 = Params::from_vec(vec![2.0, 0.1]);
    let lambda = 1e-2;
    let flow = FlowConfig {
        step_size: 0.05,
        max_time: 1500.0,
        ..FlowConfig::default()
    };

    let reference = integrate(&model, &data, &theta0, &RegulariserSpec::none(theta0.clone()), 0.0, &flow)?;
    let star = reference.theta_final.clone();
    println!("ridgeless    ({:.6}, {:.6})", star[0], star[1]);

    // tabulate E(c) once over the outputs the run sweeps
    let grid: Vec<f64> = (0..=20).map(|i| -0.1 + 1.2 * i as f64 / 20.0).collect();
    let (table, _) = EnergyTable::build(&model, &data, &theta0, &grid, 64)?;
    let ridge = GeodesicRidge::new(
        model.clone(),
        data.clone(),
        theta0.clone(),
        reference,
        EnergyMode::Table(table),
    )?;

    let regularised = FlowConfig {
        residual_tol: 0.0,
        ..flow.clone()
    };
    let specs = [
        RegulariserSpec::standard(theta0.clone()),
        RegulariserSpec::anchored(theta0.clone()),
        RegulariserSpec::arc(theta0.clone()),
        RegulariserSpec::geodesic(Arc::new(ridge)),
    ];
    for spec in &specs {
        let cfg = if spec.name() == "geodesic" {
            FlowConfig {
                equilibrium_tol: 1e-7,
                ..regularised.clone()
            }
        } else {
            regularised.clone()
        };
        let traj = integrate(&model, &data, &theta0, spec, lambda, &cfg)?;
        let end = &traj.theta_final;
        println!(
            "{:<12} ({:.6}, {:.6})  |θ − θ*| = {:.3e}  stop {:?}",
            spec.name(),
            end[0],
            end[1],
            (end - &star).norm(),
            traj.stop_reason
        );
    }
    Ok(())
}
