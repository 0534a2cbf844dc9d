//! Along a ridgeless run, the canonical energy of the current outputs sits
//! between the squared displacement and the squared path length:
//! `‖θ − θ₀‖² ≤ E(g(θ)) ≤ s²`.

use geoflow::energy::{solve_horizontal_energy, EnergyProblem};
use geoflow::{integrate, Dataset, FlowConfig, Model, Params, RegulariserSpec};

fn main() -> geoflow::Result<()> {
    let model = Model::BilinearToy;
    let data = Dataset::scalar(&[1.0], &[1.0])?;
    let theta0 = Params::from_vec(vec![2.0, 0.1]);
    let flow = FlowConfig {
        step_size: 0.01,
        max_time: 50.0,
        ..FlowConfig::default()
    };
    let run = integrate(&model, &data, &theta0, &RegulariserSpec::none(theta0.clone()), 0.0, &flow)?;

    println!("{:>8} {:>10} {:>14} {:>14} {:>14}", "t", "c", "|θ-θ0|²", "E(c)", "s²");
    for rec in run.steps.iter().step_by(20) {
        let res = solve_horizontal_energy(&EnergyProblem::new(&model, &data, theta0.clone(), rec.outputs.clone()))?;
        let lower = (rec.theta.as_ref().expect("stored") - &theta0).norm_squared();
        println!(
            "{:>8.3} {:>10.6} {:>14.8} {:>14.8} {:>14.8}",
            rec.t,
            rec.outputs[0],
            lower,
            res.energy,
            rec.arc_length.powi(2)
        );
    }
    Ok(())
}
