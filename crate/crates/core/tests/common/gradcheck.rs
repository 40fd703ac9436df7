//! Finite-difference gradient cases shared by the gradient and acceptance tests.

use super::{central_difference, pseudo, pseudo_tensor, scene_triple, worst_relative_error};
use deblur_core::network::layers::{
    concat, concat_backward, conv_backward, conv_forward, leaky_relu, leaky_relu_backward, upsample2,
    upsample2_backward, ConvSpec,
};
use deblur_core::network::loss::JOINT_DEBLUR_WEIGHT;
use deblur_core::network::{joint_gradients, Cascade, NetArch, NetParams, Tensor};

pub const H: f64 = 1e-5;
pub const TOL: f64 = 1e-5;
pub const FLOOR: f64 = 1e-8;

/// Analytic gradient next to its central-difference estimate.
pub struct Case {
    pub name: String,
    pub analytic: Vec<f64>,
    pub fd: Vec<f64>,
}

impl Case {
    fn new(name: impl Into<String>, analytic: Vec<f64>, fd: Vec<f64>) -> Self {
        Self { name: name.into(), analytic, fd }
    }

    /// Worst relative error where |FD| > `FLOOR`, and the number of entries checked.
    pub fn worst(&self) -> (f64, usize) {
        worst_relative_error(&self.analytic, &self.fd, FLOOR)
    }

    pub fn assert_ok(&self) {
        let (worst, checked) = self.worst();
        assert!(checked > 0, "{}: nothing checked", self.name);
        assert!(worst <= TOL, "{}: worst relative error {worst:.3e} over {checked}", self.name);
    }
}

pub fn dot(a: &Tensor<f64>, r: &[f64]) -> f64 {
    a.data.iter().zip(r).map(|(x, y)| x * y).sum()
}

/// Weight, bias and input gradients of a convolution at strides 1 and 2.
pub fn conv_cases() -> Vec<Case> {
    let mut cases = Vec::new();
    for stride in [1, 2] {
        let spec = ConvSpec { in_channels: 3, out_channels: 2, stride };
        let mut w = pseudo(spec.weight_len(), 1);
        let mut b = pseudo(2, 2);
        let mut x = pseudo(3 * 6 * 6, 3);
        let (oh, ow) = spec.output_size(6, 6);
        let r = pseudo(2 * oh * ow, 4);
        let loss = |w: &[f64], b: &[f64], x: &[f64]| {
            let xt = Tensor::from_vec(3, 6, 6, x.to_vec()).unwrap();
            dot(&conv_forward(&spec, w, b, &xt).0, &r)
        };
        let xt = Tensor::from_vec(3, 6, 6, x.clone()).unwrap();
        let (_, cache) = conv_forward(&spec, &w, &b, &xt);
        let g = Tensor::from_vec(2, oh, ow, r.clone()).unwrap();
        let mut gw = vec![0.0; w.len()];
        let mut gb = vec![0.0; 2];
        let gx = conv_backward(&spec, &w, &cache, &g, &mut gw, &mut gb);

        let (bb, xx) = (b.clone(), x.clone());
        let fd_w: Vec<f64> = (0..w.len())
            .map(|i| central_difference(&mut w, i, H, |w| loss(w, &bb, &xx)))
            .collect();
        let ww = w.clone();
        let fd_b: Vec<f64> = (0..2)
            .map(|i| central_difference(&mut b, i, H, |b| loss(&ww, b, &xx)))
            .collect();
        let fd_x: Vec<f64> = (0..x.len())
            .map(|i| central_difference(&mut x, i, H, |x| loss(&ww, &bb, x)))
            .collect();
        cases.push(Case::new(format!("conv stride {stride} weights"), gw, fd_w));
        cases.push(Case::new(format!("conv stride {stride} bias"), gb, fd_b));
        cases.push(Case::new(format!("conv stride {stride} input"), gx.data, fd_x));
    }
    cases
}

pub fn leaky_relu_case() -> Case {
    // Keep inputs away from the kink so the difference quotient is smooth.
    let mut x: Vec<f64> = pseudo(40, 5)
        .into_iter()
        .map(|v| if v.abs() < 0.05 { v + 0.1 } else { v })
        .collect();
    let r = pseudo(40, 6);
    let f = |x: &[f64]| {
        let mut t = Tensor::from_vec(1, 5, 8, x.to_vec()).unwrap();
        leaky_relu(&mut t);
        dot(&t, &r)
    };
    let mut y = Tensor::from_vec(1, 5, 8, x.clone()).unwrap();
    leaky_relu(&mut y);
    let mut g = Tensor::from_vec(1, 5, 8, r.clone()).unwrap();
    leaky_relu_backward(&y, &mut g);
    let fd: Vec<f64> = (0..40).map(|i| central_difference(&mut x, i, H, f)).collect();
    Case::new("leaky relu", g.data, fd)
}

pub fn upsample_case() -> Case {
    let mut x = pseudo(2 * 3 * 4, 7);
    let r = pseudo(2 * 6 * 8, 8);
    let f = |x: &[f64]| dot(&upsample2(&Tensor::from_vec(2, 3, 4, x.to_vec()).unwrap()), &r);
    let g = upsample2_backward(&Tensor::from_vec(2, 6, 8, r.clone()).unwrap());
    let fd: Vec<f64> = (0..x.len()).map(|i| central_difference(&mut x, i, H, f)).collect();
    Case::new("upsample", g.data, fd)
}

pub fn concat_case() -> Case {
    let a = pseudo_tensor(2, 3, 3, 9);
    let mut bv = pseudo(3 * 9, 10);
    let r = pseudo(5 * 9, 11);
    let f = |b: &[f64]| dot(&concat(&a, &Tensor::from_vec(3, 3, 3, b.to_vec()).unwrap()), &r);
    let (_, gb) = concat_backward(&Tensor::from_vec(5, 3, 3, r.clone()).unwrap(), 2);
    let fd: Vec<f64> = (0..bv.len()).map(|i| central_difference(&mut bv, i, H, f)).collect();
    Case::new("concat", gb.data, fd)
}

/// Every layer type.
pub fn layer_cases() -> Vec<Case> {
    let mut cases = conv_cases();
    cases.push(leaky_relu_case());
    cases.push(upsample_case());
    cases.push(concat_case());
    cases
}

/// Both subnets' parameters under the joint loss on a 1-level, 4-channel,
/// 8×8 instance, differenced with step `h`.
pub fn joint_cascade_case(h: f64) -> Case {
    let arch = NetArch { levels: 1, base_channels: 4, ..Default::default() };
    let cascade = Cascade {
        denoiser: NetParams::<f64>::init(arch, 1),
        deblurrer: NetParams::<f64>::init(arch, 2),
    };
    let (n, b, i) = scene_triple(8, 0);
    let (_, grads) = joint_gradients(&cascade, &n, &b, &i).unwrap();
    let split = arch.param_count();
    let mut flat: Vec<f64> = cascade.denoiser.flat().into_iter().chain(cascade.deblurrer.flat()).collect();
    let outputs = |v: &[f64]| {
        let c = Cascade {
            denoiser: NetParams::from_flat(arch, &v[..split]).unwrap(),
            deblurrer: NetParams::from_flat(arch, &v[split..]).unwrap(),
        };
        c.run(&n).unwrap()
    };
    // L(x+h) - L(x-h) summed per pixel as (r+ - r-)(r+ + r-), so the two
    // nearly equal losses are never subtracted as totals.
    let fd: Vec<f64> = (0..flat.len())
        .map(|k| {
            let orig = flat[k];
            flat[k] = orig + h;
            let (up, step_hi) = (outputs(&flat), flat[k]);
            flat[k] = orig - h;
            let (down, step_lo) = (outputs(&flat), flat[k]);
            flat[k] = orig;
            let delta = |p: &Tensor<f64>, m: &Tensor<f64>, t: &Tensor<f64>| {
                let sum: f64 = p.data.iter().zip(&m.data).zip(&t.data).map(|((a, b), y)| (a - b) * (a + b - 2.0 * y)).sum();
                sum / t.data.len() as f64
            };
            let dl = delta(&up.0, &down.0, &b) + JOINT_DEBLUR_WEIGHT * delta(&up.1, &down.1, &i);
            dl / (step_hi - step_lo)
        })
        .collect();
    let analytic: Vec<f64> = grads.denoiser.flat().into_iter().chain(grads.deblurrer.flat()).collect();
    Case::new("joint cascade", analytic, fd)
}
