//! The linear toy `f = (θ₁ + θ₂)x` has a constant Jacobian, so everything
//! is closed form: the flow limit, `E(c) = (c − c₀)²/K` and geodesic ridge,
//! which reduces to anchored ridge.

use geoflow::energy::{solve_horizontal_energy, EnergyMode, EnergyProblem, GeodesicRidge};
use geoflow::{integrate, Dataset, FlowConfig, Model, Params, RegulariserSpec};
use nalgebra::DVector;

fn main() -> geoflow::Result<()> {
    let model = Model::LinearToy;
    let data = Dataset::scalar(&[1.0], &[1.0])?;
    let theta0 = Params::from_vec(vec![0.0, 0.0]);
    let flow = FlowConfig {
        residual_tol: 1e-12,
        ..FlowConfig::default()
    };

    let reference = integrate(&model, &data, &theta0, &RegulariserSpec::none(theta0.clone()), 0.0, &flow)?;
    let end = &reference.theta_final;
    println!("flow limit ({:.9}, {:.9}), expected (0.5, 0.5)", end[0], end[1]);
    println!(
        "log-residual slope {:.5}, expected -4",
        reference.log_residual_slope(1e-11).unwrap_or(f64::NAN)
    );

    for c in [0.25, 0.5, 1.0, 1.5] {
        let res = solve_horizontal_energy(&EnergyProblem::new(
            &model,
            &data,
            theta0.clone(),
            DVector::from_element(1, c),
        ))?;
        println!("E({c:<4}) = {:.9}   c²/2 = {:.9}", res.energy, c * c / 2.0);
    }

    let ridge = GeodesicRidge::new(model, data, theta0.clone(), reference, EnergyMode::Direct { segments: 64 })?;
    for u in [0.1, 0.3, 0.45] {
        let theta = Params::from_vec(vec![u, u]);
        println!(
            "θ = ({u}, {u}): geodesic {:.9}  anchored {:.9}",
            ridge.value(&theta)?,
            (&theta - &theta0).norm_squared()
        );
    }
    Ok(())
}
