//! Minimal dense feed-forward networks with exact reverse-mode gradients.
//!
//! The agent needs exactly three small architectures (actor, critic, and
//! their targets), so differentiation is hand-rolled for the dense-MLP graph
//! instead of pulling in a general autodiff framework. Parameters live in one
//! flat `Vec<f64>` per network: for each layer, weights in row-major
//! (out x in) order followed by the bias vector. `backward_tape` returns both
//! parameter gradients and the input gradient; the latter is what lets the
//! actor update chain a critic's action-gradient through the policy network.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::CoreError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Linear,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    z
                } else {
                    0.0
                }
            }
            Activation::Tanh => z.tanh(),
            Activation::Linear => z,
        }
    }

    /// Derivative expressed through the post-activation value. ReLU uses the
    /// subgradient 0 at exactly zero.
    #[inline]
    fn deriv_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
            Activation::Linear => 1.0,
        }
    }

    fn code(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Tanh => 1,
            Activation::Linear => 2,
        }
    }

    fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(Activation::Relu),
            1 => Some(Activation::Tanh),
            2 => Some(Activation::Linear),
            _ => None,
        }
    }
}

/// Architecture description: `layer_sizes[0]` is the input width, the last
/// entry the output width. Hidden layers share one activation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub layer_sizes: Vec<usize>,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
}

impl MlpSpec {
    pub fn new(layer_sizes: Vec<usize>, output_activation: Activation) -> Self {
        assert!(layer_sizes.len() >= 2, "need at least input and output layer");
        assert!(layer_sizes.iter().all(|&s| s > 0), "layer sizes must be positive");
        MlpSpec {
            layer_sizes,
            hidden_activation: Activation::Relu,
            output_activation,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn param_count(&self) -> usize {
        self.layer_sizes
            .windows(2)
            .map(|w| w[1] * (w[0] + 1))
            .sum()
    }

    fn activation_of_layer(&self, layer: usize) -> Activation {
        if layer + 1 == self.num_layers() {
            self.output_activation
        } else {
            self.hidden_activation
        }
    }
}

/// Reusable forward-pass record: `acts[0]` is the input, `acts[l+1]` the
/// post-activation output of layer `l`. Holding one `Tape` per call site
/// avoids reallocating in training loops.
#[derive(Debug, Default, Clone)]
pub struct Tape {
    acts: Vec<Vec<f64>>,
    grad_cur: Vec<f64>,
    grad_prev: Vec<f64>,
}

impl Tape {
    pub fn output(&self) -> &[f64] {
        self.acts.last().map(|v| v.as_slice()).unwrap_or(&[])
    }
}

#[derive(Debug, Clone)]
pub struct Mlp {
    pub spec: MlpSpec,
    pub params: Vec<f64>,
}

impl Mlp {
    /// Glorot-uniform weights (fan-based bound), zero biases.
    pub fn init(spec: MlpSpec, rng: &mut impl Rng) -> Self {
        let mut params = Vec::with_capacity(spec.param_count());
        for w in spec.layer_sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for _ in 0..fan_in * fan_out {
                let u: f64 = rng.random();
                params.push((2.0 * u - 1.0) * bound);
            }
            params.extend(std::iter::repeat(0.0).take(fan_out));
        }
        Mlp { spec, params }
    }

    pub fn zeros(spec: MlpSpec) -> Self {
        let n = spec.param_count();
        Mlp {
            spec,
            params: vec![0.0; n],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.spec.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.spec.output_dim()
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        let mut tape = Tape::default();
        self.forward_tape(input, &mut tape);
        tape.acts.pop().unwrap()
    }

    /// Forward pass recording activations; returns the output slice.
    pub fn forward_tape<'t>(&self, input: &[f64], tape: &'t mut Tape) -> &'t [f64] {
        assert_eq!(
            input.len(),
            self.spec.input_dim(),
            "input width does not match layer 0"
        );
        let n_layers = self.spec.num_layers();
        tape.acts.resize(n_layers + 1, Vec::new());
        tape.acts[0].clear();
        tape.acts[0].extend_from_slice(input);

        let mut offset = 0;
        for l in 0..n_layers {
            let inn = self.spec.layer_sizes[l];
            let out = self.spec.layer_sizes[l + 1];
            let act = self.spec.activation_of_layer(l);
            let (w, rest) = self.params[offset..].split_at(inn * out);
            let b = &rest[..out];
            offset += out * (inn + 1);

            let (prev_slot, cur_slot) = {
                let (a, bta) = tape.acts.split_at_mut(l + 1);
                (&a[l], &mut bta[0])
            };
            cur_slot.clear();
            for j in 0..out {
                let row = &w[j * inn..(j + 1) * inn];
                let mut s = b[j];
                for i in 0..inn {
                    s += row[i] * prev_slot[i];
                }
                cur_slot.push(act.apply(s));
            }
        }
        tape.acts[n_layers].as_slice()
    }

    /// Reverse pass for the scalar J whose gradient w.r.t. the network output
    /// is `output_grad`. Parameter gradients are accumulated into
    /// `param_grads` (callers zero it between batches); the gradient w.r.t.
    /// the network input is written to `input_grad`.
    pub fn backward_tape(
        &self,
        tape: &mut Tape,
        output_grad: &[f64],
        param_grads: &mut [f64],
        input_grad: &mut [f64],
    ) {
        let n_layers = self.spec.num_layers();
        assert_eq!(output_grad.len(), self.spec.output_dim());
        assert_eq!(param_grads.len(), self.params.len());
        assert_eq!(input_grad.len(), self.spec.input_dim());
        assert_eq!(
            tape.acts.len(),
            n_layers + 1,
            "backward requires a recorded forward pass"
        );

        let acts = &tape.acts;
        let grad_cur = &mut tape.grad_cur;
        let grad_prev = &mut tape.grad_prev;
        grad_cur.clear();
        grad_cur.extend_from_slice(output_grad);

        let mut offset = self.params.len();
        for l in (0..n_layers).rev() {
            let inn = self.spec.layer_sizes[l];
            let out = self.spec.layer_sizes[l + 1];
            let act = self.spec.activation_of_layer(l);
            offset -= out * (inn + 1);
            let w = &self.params[offset..offset + inn * out];
            let (gw, gb) = param_grads[offset..offset + out * (inn + 1)].split_at_mut(inn * out);

            let a_prev = &acts[l];
            let a_cur = &acts[l + 1];

            // dz_j = dJ/da_j * act'(z_j), then scatter into weight/bias grads
            // and fold back into dJ/da_prev.
            grad_prev.clear();
            grad_prev.resize(inn, 0.0);
            for j in 0..out {
                let dz = grad_cur[j] * act.deriv_from_output(a_cur[j]);
                if dz == 0.0 {
                    continue;
                }
                gb[j] += dz;
                let grow = &mut gw[j * inn..(j + 1) * inn];
                let wrow = &w[j * inn..(j + 1) * inn];
                for i in 0..inn {
                    grow[i] += dz * a_prev[i];
                    grad_prev[i] += dz * wrow[i];
                }
            }
            std::mem::swap(grad_cur, grad_prev);
        }
        input_grad.copy_from_slice(grad_cur);
    }

    pub fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        w.write_all(b"MLPB")?;
        w.write_all(&1u32.to_le_bytes())?;
        w.write_all(&(self.spec.layer_sizes.len() as u32).to_le_bytes())?;
        for &s in &self.spec.layer_sizes {
            w.write_all(&(s as u32).to_le_bytes())?;
        }
        w.write_all(&[self.spec.hidden_activation.code(), self.spec.output_activation.code()])?;
        w.write_all(&(self.params.len() as u64).to_le_bytes())?;
        for &p in &self.params {
            w.write_all(&p.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self, CoreError> {
        let mut off = Offset(0);
        let magic = read_bytes::<4>(r, &mut off)?;
        if &magic != b"MLPB" {
            return Err(CoreError::parse(0, "bad magic, not a network block"));
        }
        let version = read_u32(r, &mut off)?;
        if version != 1 {
            return Err(CoreError::parse(4, format!("unsupported version {version}")));
        }
        let n_sizes = read_u32(r, &mut off)? as usize;
        if !(2..=64).contains(&n_sizes) {
            return Err(CoreError::parse(8, format!("implausible layer count {n_sizes}")));
        }
        let mut layer_sizes = Vec::with_capacity(n_sizes);
        for _ in 0..n_sizes {
            let s = read_u32(r, &mut off)? as usize;
            if s == 0 {
                return Err(CoreError::parse(off.0, "zero layer size"));
            }
            layer_sizes.push(s);
        }
        let acts = read_bytes::<2>(r, &mut off)?;
        let hidden = Activation::from_code(acts[0])
            .ok_or_else(|| CoreError::parse(off.0 - 2, format!("bad activation code {}", acts[0])))?;
        let output = Activation::from_code(acts[1])
            .ok_or_else(|| CoreError::parse(off.0 - 1, format!("bad activation code {}", acts[1])))?;
        let spec = MlpSpec {
            layer_sizes,
            hidden_activation: hidden,
            output_activation: output,
        };
        let declared = read_u64(r, &mut off)? as usize;
        if declared != spec.param_count() {
            return Err(CoreError::schema(
                format!("{} parameters for sizes {:?}", spec.param_count(), spec.layer_sizes),
                format!("{declared} parameters declared"),
            ));
        }
        let mut params = Vec::with_capacity(declared);
        for _ in 0..declared {
            params.push(f64::from_le_bytes(read_bytes::<8>(r, &mut off)?));
        }
        Ok(Mlp { spec, params })
    }

    pub fn save_file(&self, path: &Path) -> Result<(), CoreError> {
        let mut f = std::fs::File::create(path)
            .map_err(|e| CoreError::io(path.display().to_string(), e))?;
        self.write_to(&mut f)
            .map_err(|e| CoreError::io(path.display().to_string(), e))
    }

    pub fn load_file(path: &Path) -> Result<Self, CoreError> {
        let bytes = std::fs::read(path).map_err(|e| CoreError::io(path.display().to_string(), e))?;
        Mlp::read_from(&mut bytes.as_slice())
    }
}

struct Offset(u64);

fn read_bytes<const N: usize>(r: &mut impl Read, off: &mut Offset) -> Result<[u8; N], CoreError> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|_| CoreError::parse(off.0, "unexpected end of data"))?;
    off.0 += N as u64;
    Ok(buf)
}

fn read_u32(r: &mut impl Read, off: &mut Offset) -> Result<u32, CoreError> {
    Ok(u32::from_le_bytes(read_bytes::<4>(r, off)?))
}

fn read_u64(r: &mut impl Read, off: &mut Offset) -> Result<u64, CoreError> {
    Ok(u64::from_le_bytes(read_bytes::<8>(r, off)?))
}

/// Plain gradient step `p -= lr * g`.
#[derive(Debug, Clone, Copy)]
pub struct Sgd {
    pub lr: f64,
}

impl Sgd {
    pub fn step(&self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), grads.len());
        for (p, g) in params.iter_mut().zip(grads) {
            *p -= self.lr * g;
        }
    }
}

/// Adam with bias correction; moment buffers are owned per optimized network.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(lr: f64, n_params: usize) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(params.len(), grads.len());
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mhat = self.m[i] / bc1;
            let vhat = self.v[i] / bc2;
            params[i] -= self.lr * mhat / (vhat.sqrt() + self.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng(seed: u64) -> crate::seed::Stream {
        crate::seed::Stream::seed_from_u64(seed)
    }

    /// J(theta) = dot(g, f(theta, x)) for a fixed probe vector g.
    fn probe_value(net: &Mlp, input: &[f64], g: &[f64]) -> f64 {
        net.forward(input).iter().zip(g).map(|(o, gi)| o * gi).sum()
    }

    /// Minimum |pre-activation| across all ReLU units; finite differencing is
    /// only trusted away from the kink.
    fn min_relu_margin(net: &Mlp, input: &[f64]) -> f64 {
        let mut margin = f64::INFINITY;
        let mut a = input.to_vec();
        let mut offset = 0;
        for l in 0..net.spec.num_layers() {
            let inn = net.spec.layer_sizes[l];
            let out = net.spec.layer_sizes[l + 1];
            let act = net.spec.activation_of_layer(l);
            let w = &net.params[offset..offset + inn * out];
            let b = &net.params[offset + inn * out..offset + out * (inn + 1)];
            offset += out * (inn + 1);
            let mut next = Vec::with_capacity(out);
            for j in 0..out {
                let mut z = b[j];
                for i in 0..inn {
                    z += w[j * inn + i] * a[i];
                }
                if act == Activation::Relu {
                    margin = margin.min(z.abs());
                }
                next.push(act.apply(z));
            }
            a = next;
        }
        margin
    }

    #[test]
    fn backward_matches_central_differences() {
        let shapes: Vec<(Vec<usize>, Activation)> = vec![
            (vec![2, 3, 1], Activation::Tanh),
            (vec![4, 5, 2], Activation::Linear),
            (vec![3, 8, 6, 2], Activation::Tanh),
            (vec![5, 16, 4], Activation::Linear),
            (vec![1, 4, 4, 1], Activation::Tanh),
        ];
        let h = 1e-5;
        let mut checked = 0;
        for (case, (sizes, out_act)) in shapes.into_iter().enumerate() {
            let mut r = rng(1000 + case as u64);
            let net = Mlp::init(MlpSpec::new(sizes.clone(), out_act), &mut r);
            let input: Vec<f64> = (0..sizes[0]).map(|_| r.random::<f64>() * 2.0 - 1.0).collect();
            let g: Vec<f64> = (0..*sizes.last().unwrap())
                .map(|_| r.random::<f64>() * 2.0 - 1.0)
                .collect();
            if min_relu_margin(&net, &input) < 1e-3 {
                continue; // kink too close for finite differences
            }

            let mut tape = Tape::default();
            net.forward_tape(&input, &mut tape);
            let mut pg = vec![0.0; net.params.len()];
            let mut ig = vec![0.0; net.input_dim()];
            net.backward_tape(&mut tape, &g, &mut pg, &mut ig);

            for k in 0..net.params.len() {
                let mut plus = net.clone();
                plus.params[k] += h;
                let mut minus = net.clone();
                minus.params[k] -= h;
                let num = (probe_value(&plus, &input, &g) - probe_value(&minus, &input, &g)) / (2.0 * h);
                let denom = (num.abs() + pg[k].abs()).max(1e-5);
                assert!(
                    ((num - pg[k]) / denom).abs() < 1e-4,
                    "param {k} of {:?}: analytic {} vs numeric {}",
                    sizes,
                    pg[k],
                    num
                );
            }
            for k in 0..net.input_dim() {
                let mut xp = input.clone();
                xp[k] += h;
                let mut xm = input.clone();
                xm[k] -= h;
                let num = (probe_value(&net, &xp, &g) - probe_value(&net, &xm, &g)) / (2.0 * h);
                let denom = (num.abs() + ig[k].abs()).max(1e-5);
                assert!(
                    ((num - ig[k]) / denom).abs() < 1e-4,
                    "input {k} of {:?}: analytic {} vs numeric {}",
                    sizes,
                    ig[k],
                    num
                );
            }
            checked += 1;
        }
        assert!(checked >= 4, "kink filter rejected too many cases");
    }

    #[test]
    fn zero_output_grad_gives_zero_gradients() {
        let mut r = rng(7);
        let net = Mlp::init(MlpSpec::new(vec![3, 6, 2], Activation::Tanh), &mut r);
        let mut tape = Tape::default();
        net.forward_tape(&[0.3, -0.1, 0.8], &mut tape);
        let mut pg = vec![0.0; net.params.len()];
        let mut ig = vec![0.0; 3];
        net.backward_tape(&mut tape, &[0.0, 0.0], &mut pg, &mut ig);
        assert!(pg.iter().all(|&x| x == 0.0));
        assert!(ig.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn linear_single_layer_input_grad_is_w_transpose_times_grad() {
        // y = Wx, so dJ/dx = W^T g.
        let spec = MlpSpec::new(vec![2, 2], Activation::Linear);
        let net = Mlp {
            spec,
            params: vec![1.0, 2.0, 3.0, 4.0, 0.0, 0.0], // W=[[1,2],[3,4]], b=0
        };
        assert_eq!(net.forward(&[1.0, 1.0]), vec![3.0, 7.0]);
        let mut tape = Tape::default();
        net.forward_tape(&[1.0, 1.0], &mut tape);
        let mut pg = vec![0.0; net.params.len()];
        let mut ig = vec![0.0; 2];
        net.backward_tape(&mut tape, &[1.0, 1.0], &mut pg, &mut ig);
        assert_eq!(ig, vec![4.0, 6.0]); // W^T [1,1]
    }

    #[test]
    fn init_bounds_and_zero_biases() {
        let spec = MlpSpec::new(vec![8, 50, 100, 3], Activation::Tanh);
        let mut r = rng(11);
        let net = Mlp::init(spec.clone(), &mut r);
        let mut offset = 0;
        for w in spec.layer_sizes.windows(2) {
            let bound = (6.0 / (w[0] + w[1]) as f64).sqrt();
            let weights = &net.params[offset..offset + w[0] * w[1]];
            assert!(weights.iter().all(|&x| x.abs() <= bound));
            let biases = &net.params[offset + w[0] * w[1]..offset + w[1] * (w[0] + 1)];
            assert!(biases.iter().all(|&x| x == 0.0));
            offset += w[1] * (w[0] + 1);
        }
        // zero input propagates to activation of zero bias
        let out = net.forward(&[0.0; 8]);
        assert!(out.iter().all(|&x| x == 0.0));
        // determinism
        let net2 = Mlp::init(spec, &mut rng(11));
        assert_eq!(net.params, net2.params);
    }

    #[test]
    fn identity_network_passes_positive_input_through() {
        let spec = MlpSpec::new(vec![3, 3], Activation::Linear);
        let mut net = Mlp::zeros(spec);
        for i in 0..3 {
            net.params[i * 3 + i] = 1.0;
        }
        assert_eq!(net.forward(&[0.5, 1.5, 2.0]), vec![0.5, 1.5, 2.0]);
    }

    #[test]
    fn tanh_outputs_stay_in_open_interval() {
        let mut r = rng(23);
        let net = Mlp::init(MlpSpec::new(vec![4, 10, 5], Activation::Tanh), &mut r);
        for _ in 0..50 {
            let x: Vec<f64> = (0..4).map(|_| r.random::<f64>() * 2.0 - 1.0).collect();
            assert!(net.forward(&x).iter().all(|&y| y > -1.0 && y < 1.0));
        }
    }

    #[test]
    fn forward_is_pure() {
        let mut r = rng(5);
        let net = Mlp::init(MlpSpec::new(vec![3, 7, 2], Activation::Tanh), &mut r);
        let x = [0.1, -0.4, 0.9];
        let a = net.forward(&x);
        let b = net.forward(&x);
        assert_eq!(a, b);
    }

    #[test]
    fn sgd_step_is_exact() {
        let mut params = vec![1.0];
        Sgd { lr: 0.1 }.step(&mut params, &[1.0]);
        assert_eq!(params, vec![0.9]);
        Sgd { lr: 0.0 }.step(&mut params, &[123.0]);
        assert_eq!(params, vec![0.9]);
    }

    #[test]
    fn adam_first_step_magnitude_is_lr() {
        // Bias-corrected first step is lr * g / (|g| + eps), so magnitude is
        // lr up to eps/|g| regardless of gradient scale.
        for &g in &[0.5, 1.0, 250.0, 1e-3] {
            let mut params = vec![0.0];
            let mut adam = Adam::new(1e-3, 1);
            adam.step(&mut params, &[g]);
            let ratio = params[0].abs() / 1e-3;
            assert!(
                (ratio - 1.0).abs() < 1e-4,
                "g={g}: first-step magnitude ratio {ratio}"
            );
        }
        // lr=0 leaves params untouched
        let mut params = vec![2.0];
        Adam::new(0.0, 1).step(&mut params, &[5.0]);
        assert_eq!(params, vec![2.0]);
    }

    #[test]
    fn checkpoint_roundtrip_is_bit_exact() {
        let mut r = rng(31);
        let net = Mlp::init(MlpSpec::new(vec![6, 50, 100, 4], Activation::Tanh), &mut r);
        let mut buf = Vec::new();
        net.write_to(&mut buf).unwrap();
        let back = Mlp::read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(back.spec, net.spec);
        assert_eq!(back.params.len(), net.params.len());
        for (a, b) in net.params.iter().zip(&back.params) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn checkpoint_rejects_corruption() {
        let mut r = rng(37);
        let net = Mlp::init(MlpSpec::new(vec![2, 3, 1], Activation::Linear), &mut r);
        let mut buf = Vec::new();
        net.write_to(&mut buf).unwrap();

        let mut bad_magic = buf.clone();
        bad_magic[0] = b'X';
        match Mlp::read_from(&mut bad_magic.as_slice()) {
            Err(CoreError::Parse { offset: 0, .. }) => {}
            other => panic!("expected parse error at offset 0, got {other:?}"),
        }

        let truncated = &buf[..buf.len() - 5];
        match Mlp::read_from(&mut &truncated[..]) {
            Err(CoreError::Parse { offset, .. }) => assert!(offset > 0),
            other => panic!("expected parse error, got {other:?}"),
        }

        // header that disagrees with its own declared parameter count
        let mut mismatched = buf.clone();
        let pc_off = 4 + 4 + 4 + 3 * 4 + 2;
        mismatched[pc_off..pc_off + 8].copy_from_slice(&999u64.to_le_bytes());
        match Mlp::read_from(&mut mismatched.as_slice()) {
            Err(CoreError::Schema { .. }) => {}
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn relu_subgradient_at_zero_is_zero() {
        // single relu unit with z exactly 0: gradient through it must vanish
        let spec = MlpSpec {
            layer_sizes: vec![1, 1, 1],
            hidden_activation: Activation::Relu,
            output_activation: Activation::Linear,
        };
        let net = Mlp {
            spec,
            params: vec![0.0, 0.0, 2.0, 0.0], // hidden w=0,b=0 (z=0); out w=2,b=0
        };
        let mut tape = Tape::default();
        net.forward_tape(&[3.0], &mut tape);
        let mut pg = vec![0.0; 4];
        let mut ig = vec![0.0; 1];
        net.backward_tape(&mut tape, &[1.0], &mut pg, &mut ig);
        assert_eq!(ig[0], 0.0);
        assert_eq!(pg[0], 0.0);
    }
}
