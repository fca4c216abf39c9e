//! Every parameter tensor must influence the logits: perturbing one
//! element of each must change the eval-mode forward output.

use fast_core::model::{build, ModelConfig};
use fast_core::{Rng, Tape, Tensor};

#[test]
fn every_parameter_tensor_reaches_the_logits() {
    let cfg = ModelConfig::tiny(2);
    let model = build::<f64>(&cfg, 31).unwrap();
    let mut rng = Rng::new(1);
    let x = Tensor::randn(&[cfg.image_size.0, cfg.image_size.1, 1], 1.0, &mut rng);
    let tape = Tape::inference();
    let mut fwd_rng = Rng::new(0);
    let baseline = model
        .forward_single(&tape, &x, false, &mut fwd_rng)
        .unwrap()
        .to_vec();

    let mut unreachable = Vec::new();
    for (name, tensor) in model.named_params() {
        tensor.update_data(|d| d[0] += 0.5);
        let logits = model
            .forward_single(&tape, &x, false, &mut fwd_rng)
            .unwrap()
            .to_vec();
        tensor.update_data(|d| d[0] -= 0.5);
        if logits == baseline {
            unreachable.push(name);
        }
    }
    assert!(
        unreachable.is_empty(),
        "parameters with no effect on the logits: {unreachable:?}"
    );
}
