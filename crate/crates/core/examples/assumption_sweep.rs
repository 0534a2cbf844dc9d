//! NTK extremes of a μP MLP over ridgeless training on a 16-point
//! regression toy, for one width and seed.
//!
//! ```text
//! cargo run --release --example assumption_sweep -- 256
//! ```

use geoflow::experiments::scenarios::sweep_dataset;
use geoflow::model::mup_init;
use geoflow::{integrate, Activation, FlowConfig, Integrator, MlpSpec, Model, RegulariserSpec};

fn main() -> geoflow::Result<()> {
    let width = std::env::args().nth(1).and_then(|w| w.parse().ok()).unwrap_or(64);
    let data = sweep_dataset(16, 0.05, 0)?;
    let model = Model::Mlp(MlpSpec::new(1, width, Activation::Gelu));
    let theta0 = mup_init(&model, 0)?;
    let flow = FlowConfig {
        step_size: 0.1,
        max_time: 100.0,
        integrator: Integrator::Euler,
        residual_tol: 0.0,
        store_params: false,
        max_halvings: 8,
        ..FlowConfig::default()
    };
    let run = integrate(&model, &data, &theta0, &RegulariserSpec::none(theta0.clone()), 0.0, &flow)?;
    println!("width {width}, {} parameters, step {}", model.num_params(), run.step_size);
    println!("{:>6} {:>12} {:>12} {:>12}", "epoch", "loss", "lambda_min", "lambda_max");
    for (epoch, rec) in run.steps.iter().enumerate().step_by(100) {
        println!(
            "{epoch:>6} {:>12.5e} {:>12.4e} {:>12.4e}",
            rec.loss,
            rec.lambda_min.unwrap_or(f64::NAN),
            rec.lambda_max.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
