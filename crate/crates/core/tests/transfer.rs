use geoflow::experiments::scenarios::{transfer_finetune, transfer_pretrain};
use geoflow::experiments::{RegName, ScenarioConfig, ScenarioParams};

#[test]
fn noiseless_ridgeless_finetune_beats_the_pretrained_network() {
    let cfg = ScenarioConfig::parse(
        "scenario = transfer_toy\nmlp.width = 32\nseeds = 3\ndata.noise = 0\nlambdas = 0\nregularisers = standard\n\
         pretrain.max_time = 200\nflow.step_size = 1.0\nflow.max_time = 100\nflow.max_halvings = 12\n",
    )
    .unwrap();
    let ScenarioParams::TransferToy(p) = &cfg.params else {
        panic!("wrong scenario")
    };
    let (model, theta_pre, data) = transfer_pretrain(p, 3).unwrap();
    let out = model.eval_outputs(&theta_pre, &data.test).unwrap();
    let pretrained = (out - data.test.targets()).norm_squared() / data.test.len() as f64;
    let cell = transfer_finetune(&model, &theta_pre, &data, RegName::None, 0.0, &cfg.flow, 3).unwrap();
    assert!(
        cell.test_mse_final < pretrained,
        "fine-tuned {} vs pretrained {pretrained}",
        cell.test_mse_final
    );
    assert!(cell.test_mse_early_stopped <= pretrained);
}
