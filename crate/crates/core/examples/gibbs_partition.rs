//! Partition function of the prior `exp(−βE(c))` over one output.
//!
//! In the kernel regime it is a Gaussian integral; on the bilinear toy it
//! stays below the bound `(πC²/β)^{1/2}`.

use geoflow::gibbs::{partition_function, GibbsConfig};
use geoflow::{integrate, Dataset, FlowConfig, Model, Params, RegulariserSpec};

fn main() -> geoflow::Result<()> {
    let data = Dataset::scalar(&[1.0], &[1.0])?;
    let flow = FlowConfig {
        step_size: 0.01,
        max_time: 50.0,
        ..FlowConfig::default()
    };
    for (model, theta0) in [(Model::LinearToy, [0.0, 0.0]), (Model::BilinearToy, [2.0, 0.1])] {
        let theta0 = Params::from_vec(theta0.to_vec());
        let reference = integrate(&model, &data, &theta0, &RegulariserSpec::none(theta0.clone()), 0.0, &flow)?;
        for beta in [1.0, 4.0] {
            let cfg = GibbsConfig {
                beta,
                ..GibbsConfig::default()
            };
            let res = partition_function(&model, &data, &theta0, &cfg, &reference)?;
            println!(
                "{:<9} beta {beta}: Z = {:.6}  bound = {:.6}  C² = {:.4}  domain [{:.3}, {:.3}]",
                model.name(),
                res.z,
                res.bound,
                res.c_squared,
                res.domain.0,
                res.domain.1
            );
        }
    }
    println!("Gaussian oracle at beta 1: {:.6}", (2.0 * std::f64::consts::PI).sqrt());
    Ok(())
}
