//! Arc ridge follows the ridgeless field and stops where `2λs = ‖∇L‖`,
//! so it behaves like early stopping along the unregularised path.

use geoflow::flow::fibre_drift;
use geoflow::{integrate, Dataset, FlowConfig, Model, Params, RegulariserSpec};

fn main() -> geoflow::Result<()> {
    let model = Model::BilinearToy;
    let data = Dataset::scalar(&[1.0], &[1.0])?;
    let theta0 = Params::from_vec(vec![2.0, 0.1]);
    let flow = FlowConfig {
        step_size: 0.01,
        max_time: 100.0,
        residual_tol: 1e-10,
        ..FlowConfig::default()
    };
    for lambda in [1e-1, 1e-2, 1e-3, 1e-4] {
        let traj = integrate(&model, &data, &theta0, &RegulariserSpec::arc(theta0.clone()), lambda, &flow)?;
        let Some(stop) = traj.arc_stop else {
            println!("lambda {lambda:e}: converged before the stop, {:?}", traj.stop_reason);
            continue;
        };
        let drift = fibre_drift(&model, &data, &traj, f64::INFINITY)?.final_drift();
        println!(
            "lambda {lambda:e}: t* = {:.4}  s* = {:.6}  2λs* = {:.3e}  |∇L| = {:.3e}  loss = {:.3e}  fibre drift = {:.1e}",
            stop.t_star,
            stop.s_star,
            2.0 * lambda * stop.s_star,
            stop.grad_norm,
            traj.last().loss,
            drift
        );
    }
    Ok(())
}
