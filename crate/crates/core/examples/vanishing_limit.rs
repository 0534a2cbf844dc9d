//! Regularised equilibria as λ shrinks, extrapolated to λ = 0, against the
//! closest-interpolator oracles.

use geoflow::experiments::scenarios::closest_interpolator;
use geoflow::flow::{extrapolate_to_zero, vanishing_lambda_limit};
use geoflow::{Dataset, FlowConfig, Model, Params, RegulariserSpec};
use nalgebra::DMatrix;

fn main() -> geoflow::Result<()> {
    let model = Model::BilinearToy;
    let data = Dataset::scalar(&[1.0], &[1.0])?;
    let theta0 = Params::from_vec(vec![2.0, 0.1]);
    let flow = FlowConfig {
        step_size: 0.05,
        max_time: 200.0,
        equilibrium_tol: 1e-11,
        ..FlowConfig::default()
    };
    let schedule = [0.1, 0.03, 0.01, 0.003];
    let specs = [
        (
            "anchored",
            RegulariserSpec::anchored(theta0.clone()),
            closest_interpolator(&model, &data, &theta0),
        ),
        (
            "standard",
            RegulariserSpec::standard(theta0.clone()),
            closest_interpolator(&model, &data, &Params::zeros(2)),
        ),
        (
            "a=1, B=0.5",
            RegulariserSpec::quadratic_ab(&model, &data, theta0.clone(), 1.0, DMatrix::from_element(1, 1, 0.5))?,
            None,
        ),
    ];
    for (name, spec, oracle) in specs {
        let points = vanishing_lambda_limit(&model, &data, &theta0, &spec, &schedule, &flow, 2e5)?;
        for p in &points {
            println!("{name:<12} lambda {:<6} ({:.6}, {:.6})", p.lambda, p.theta[0], p.theta[1]);
        }
        let limit = extrapolate_to_zero(&points).expect("several lambdas");
        print!("{name:<12} limit        ({:.6}, {:.6})", limit[0], limit[1]);
        match oracle {
            Some(o) => println!("  oracle ({:.6}, {:.6})", o[0], o[1]),
            None => println!(),
        }
    }
    Ok(())
}
