//! Analytical gradients against central finite differences (h = 1e-5) in f64.

mod common;

use common::gradcheck::{self, dot, Case, H};
use common::{central_difference, pseudo, pseudo_tensor, worst_relative_error};
use deblur_core::network::{backward, forward, joint_gradients, Cascade, NetArch, NetParams, Tensor};

fn check(name: &str, analytic: &[f64], fd: &[f64]) {
    Case { name: name.into(), analytic: analytic.to_vec(), fd: fd.to_vec() }.assert_ok();
}

#[test]
fn conv_layer_gradients() {
    for case in gradcheck::conv_cases() {
        case.assert_ok();
    }
}

#[test]
fn leaky_relu_gradient() {
    gradcheck::leaky_relu_case().assert_ok();
}

#[test]
fn upsample_and_concat_gradients() {
    gradcheck::upsample_case().assert_ok();
    gradcheck::concat_case().assert_ok();
}

fn net_loss(params: &NetParams<f64>, x: &Tensor<f64>, r: &[f64]) -> f64 {
    dot(&forward(params, x).unwrap().0, r)
}

#[test]
fn single_net_parameter_and_input_gradients() {
    let (x, _, _) = common::scene_triple(8, 0);
    for (levels, residual) in [(1, true), (1, false)] {
        let arch = NetArch { levels, base_channels: 4, residual, ..Default::default() };
        let params = NetParams::<f64>::init(arch, 1);
        let r = pseudo(64, 13);
        let (_, tape) = forward(&params, &x).unwrap();
        let (grads, gx) = backward(&params, &tape, &Tensor::from_vec(1, 8, 8, r.clone()).unwrap()).unwrap();

        let mut flat = params.flat();
        let fd: Vec<f64> = (0..flat.len())
            .map(|i| {
                central_difference(&mut flat, i, H, |v| {
                    net_loss(&NetParams::from_flat(arch, v).unwrap(), &x, &r)
                })
            })
            .collect();
        check(&format!("unet residual={residual} params"), &grads.flat(), &fd);

        let mut xv = x.data.clone();
        let fdx: Vec<f64> = (0..64)
            .map(|i| {
                central_difference(&mut xv, i, H, |v| {
                    net_loss(&params, &Tensor::from_vec(1, 8, 8, v.to_vec()).unwrap(), &r)
                })
            })
            .collect();
        check(&format!("unet residual={residual} input"), &gx.data, &fdx);
    }
}

/// A 2×2 image is the smallest input a one-level net accepts.
#[test]
fn smallest_instance_matches_finite_differences() {
    let arch = NetArch { levels: 1, base_channels: 2, ..Default::default() };
    let cascade = Cascade {
        denoiser: NetParams::<f64>::init(arch, 1),
        deblurrer: NetParams::<f64>::init(arch, 2),
    };
    let (n, b, i) = common::scene_triple(2, 0);
    let (_, grads) = joint_gradients(&cascade, &n, &b, &i).unwrap();
    let mut flat: Vec<f64> = cascade.denoiser.flat().into_iter().chain(cascade.deblurrer.flat()).collect();
    let split = arch.param_count();
    let fd: Vec<f64> = (0..flat.len())
        .map(|k| {
            central_difference(&mut flat, k, H, |v| {
                let c = Cascade {
                    denoiser: NetParams::from_flat(arch, &v[..split]).unwrap(),
                    deblurrer: NetParams::from_flat(arch, &v[split..]).unwrap(),
                };
                joint_gradients(&c, &n, &b, &i).unwrap().0
            })
        })
        .collect();
    let analytic: Vec<f64> = grads.denoiser.flat().into_iter().chain(grads.deblurrer.flat()).collect();
    // Difference quotients carry ~1e-13 absolute roundoff here, so the 1e-6
    // bound is only meaningful above |FD| = 1e-6.
    let (worst, checked) = worst_relative_error(&analytic, &fd, 1e-6);
    assert!(checked > 100, "only {checked} entries above the floor");
    assert!(worst <= 1e-6, "2x2 joint cascade: worst relative error {worst:.3e}");
}

/// With Net2 at zero weights in residual mode, `I₁ = B₁`, so the joint Net1
/// gradient is the pretraining gradient plus the pass-through term
/// `0.5 · ∂‖B₁ − I‖²/∂θ₁`.
#[test]
fn joint_gradient_with_identity_deblurrer() {
    use deblur_core::network::cascade::denoise_gradients;

    let arch = NetArch { levels: 1, base_channels: 3, ..Default::default() };
    let cascade = Cascade {
        denoiser: NetParams::<f64>::init(arch, 21),
        deblurrer: NetParams::<f64>::zeros(arch),
    };
    let n = pseudo_tensor(1, 8, 8, 22);
    let b = pseudo_tensor(1, 8, 8, 23);
    let i = pseudo_tensor(1, 8, 8, 24);
    let (_, joint) = joint_gradients(&cascade, &n, &b, &i).unwrap();
    let (_, pre) = denoise_gradients(&cascade.denoiser, &n, &b).unwrap();
    let (_, pass) = denoise_gradients(&cascade.denoiser, &n, &i).unwrap();
    for ((j, p), t) in joint.denoiser.flat().iter().zip(pre.flat()).zip(pass.flat()) {
        let want = p + 0.5 * t;
        assert!((j - want).abs() <= 1e-12 * (1.0 + want.abs()), "{j} vs {want}");
    }
}

/// With Net1 fixed, the joint Net2 gradient equals 0.5 × the deblurring
/// pretraining gradient evaluated at `B₁`.
#[test]
fn joint_net2_gradient_is_scaled_pretrain_gradient_at_b1() {
    use deblur_core::network::cascade::deblur_gradients;

    let arch = NetArch { levels: 2, base_channels: 2, ..Default::default() };
    let cascade = Cascade {
        denoiser: NetParams::<f64>::init(arch, 31),
        deblurrer: NetParams::<f64>::init(arch, 32),
    };
    let n = pseudo_tensor(1, 8, 8, 33);
    let b = pseudo_tensor(1, 8, 8, 34);
    let i = pseudo_tensor(1, 8, 8, 35);
    let (_, joint) = joint_gradients(&cascade, &n, &b, &i).unwrap();
    let b1 = deblur_core::network::predict(&cascade.denoiser, &n).unwrap();
    let (_, pre) = deblur_gradients(&cascade.deblurrer, &b1, &i).unwrap();
    for (j, p) in joint.deblurrer.flat().iter().zip(pre.flat()) {
        assert!((j - 0.5 * p).abs() <= 1e-13 * (1.0 + p.abs()));
    }
}

/// The full cascade under the joint loss on a 1-level, 4-channel, 8×8
/// instance, every parameter with |FD| > 1e-8.
#[test]
fn joint_cascade_matches_finite_differences() {
    let case = gradcheck::joint_cascade_case(H);
    assert!(case.worst().1 > 4000);
    case.assert_ok();
}
