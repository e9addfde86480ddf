mod common;

use common::{eight_point_batch, flower_loss, gradient_check};
use deep_nitsche::loss::{CouplingSign, LossModes, QTermVariant};
use deep_nitsche::network::NetworkArch;

#[test]
fn reverse_gradient_matches_central_differences() {
    let (_, loss) = flower_loss(&eight_point_batch(), LossModes::default());
    let arch = NetworkArch::new(2, 10, 3).unwrap();
    for seed in 0..4 {
        let err = gradient_check(&loss, arch, seed, 1e-4);
        println!("seed {seed}: {err:e}");
        assert!(err <= 1e-5, "seed {seed}: {err:e}");
    }
}

#[test]
fn every_loss_variant_has_exact_gradient() {
    let arch = NetworkArch::new(2, 4, 2).unwrap();
    for paper_weights in [false, true] {
        for q_term_variant in [QTermVariant::Value, QTermVariant::Flux] {
            for coupling_sign in [CouplingSign::Consistent, CouplingSign::Reversed] {
                let modes = LossModes {
                    paper_weights,
                    q_term_variant,
                    coupling_sign,
                };
                let (_, loss) = flower_loss(&eight_point_batch(), modes);
                let err = gradient_check(&loss, arch, 11, 1e-4);
                assert!(err <= 1e-5, "{modes:?}: {err:e}");
            }
        }
    }
}
