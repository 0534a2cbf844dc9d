//! Fine-tuning a pretrained μP MLP on noisy samples of its own task, with
//! each regulariser anchored at the pretrained weights.

use geoflow::experiments::scenarios::{transfer_finetune, transfer_pretrain};
use geoflow::experiments::{RegName, ScenarioConfig, ScenarioParams};

fn main() -> geoflow::Result<()> {
    let cfg = ScenarioConfig::parse(
        "scenario = transfer_toy\n\
         mlp.width = 64\n\
         data.noise = 0.1\n\
         regularisers = standard, anchored, arc\n\
         lambdas = 1e-3, 1e-1, 1e0\n\
         flow.integrator = euler\n\
         flow.step_size = 1.0\n\
         flow.max_time = 100\n\
         flow.record_every = 4\n\
         flow.max_halvings = 12\n",
    )?;
    let ScenarioParams::TransferToy(p) = &cfg.params else {
        unreachable!()
    };
    let (model, theta_pre, data) = transfer_pretrain(p, 0)?;
    let pre = model.eval_outputs(&theta_pre, &data.test)?;
    println!(
        "pretrained test MSE {:.4e}",
        (pre - data.test.targets()).norm_squared() / data.test.len() as f64
    );

    let base = transfer_finetune(&model, &theta_pre, &data, RegName::None, 0.0, &cfg.flow, 0)?;
    println!(
        "ridgeless fine-tune: early-stopped {:.4e}, final {:.4e}",
        base.test_mse_early_stopped, base.test_mse_final
    );
    for &lambda in &p.lambdas {
        for &reg in &p.regularisers {
            let cell = transfer_finetune(&model, &theta_pre, &data, reg, lambda, &cfg.flow, 0)?;
            println!(
                "lambda {lambda:<6} {:<9} early-stopped {:.4e} (t = {:>5.1})  final {:.4e}",
                reg.name(),
                cell.test_mse_early_stopped,
                cell.early_stop_t,
                cell.test_mse_final
            );
        }
    }
    Ok(())
}
