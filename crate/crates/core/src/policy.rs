//! Forward-only policy parameterizations `p = phi(h, theta)`.
//!
//! Parameters live in one flat vector, layer by layer: the weight matrix in
//! row-major order (one row per output neuron) followed by the biases. The
//! learner perturbs that vector as a whole, so nothing here exposes
//! gradients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            // a pre-activation of exactly 0 maps to 0
            Activation::Relu => {
                if z > 0.0 {
                    z
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Identity => z,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn param_count(&self) -> usize {
        self.in_dim * self.out_dim + self.out_dim
    }
}

/// A fully connected feed-forward network.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<LayerSpec>,
}

impl Network {
    pub fn new(layers: Vec<LayerSpec>) -> Result<Self> {
        for (i, l) in layers.iter().enumerate() {
            if l.in_dim == 0 || l.out_dim == 0 {
                return Err(Error::config("policy.hidden", "layer widths must be positive"));
            }
            if i > 0 && layers[i - 1].out_dim != l.in_dim {
                return Err(Error::config("policy.hidden", "consecutive layer widths disagree"));
            }
        }
        Ok(Self { layers })
    }

    /// ReLU hidden layers and a sigmoid output layer.
    pub fn mlp(input: usize, hidden: &[usize], output: usize) -> Result<Self> {
        let mut widths = vec![input];
        widths.extend_from_slice(hidden);
        widths.push(output);
        let n = widths.len() - 1;
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| LayerSpec {
                in_dim: w[0],
                out_dim: w[1],
                activation: if i + 1 == n {
                    Activation::Sigmoid
                } else {
                    Activation::Relu
                },
            })
            .collect();
        Self::new(layers)
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(LayerSpec::param_count).sum()
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.in_dim)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.out_dim)
    }

    fn max_width(&self) -> usize {
        self.layers.iter().map(|l| l.in_dim.max(l.out_dim)).max().unwrap_or(0)
    }

    /// Evaluates the network; `theta.len()` must equal `param_count()`.
    pub fn eval(&self, input: &[f64], theta: &[f64], out: &mut [f64]) {
        let w = self.max_width();
        let mut cur = vec![0.0; w];
        let mut next = vec![0.0; w];
        cur[..input.len()].copy_from_slice(input);
        let mut off = 0;
        for l in &self.layers {
            let weights = &theta[off..off + l.in_dim * l.out_dim];
            let bias = &theta[off + l.in_dim * l.out_dim..off + l.param_count()];
            for (j, nj) in next[..l.out_dim].iter_mut().enumerate() {
                let row = &weights[j * l.in_dim..(j + 1) * l.in_dim];
                let z = row
                    .iter()
                    .zip(&cur[..l.in_dim])
                    .fold(bias[j], |acc, (a, b)| acc + a * b);
                *nj = l.activation.apply(z);
            }
            std::mem::swap(&mut cur, &mut next);
            off += l.param_count();
        }
        out.copy_from_slice(&cur[..self.output_dim()]);
    }
}

/// Something that maps a fading state and a parameter vector to an
/// allocation.
pub trait Policy: Send + Sync + std::fmt::Debug {
    fn theta_dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn forward_into(&self, h: &[f64], theta: &[f64], out: &mut [f64]) -> Result<()>;

    fn forward(&self, h: &[f64], theta: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.output_dim()];
        self.forward_into(h, theta, &mut out)?;
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Structure {
    /// One single-input single-output network per user, applied to `h[i]`.
    PerUser,
    /// One network mapping the whole fading vector to all allocations.
    Joint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DnnPolicy {
    net: Network,
    structure: Structure,
    n_users: usize,
    output_scale: f64,
}

impl DnnPolicy {
    pub fn new(net: Network, structure: Structure, n_users: usize, output_scale: f64) -> Result<Self> {
        if !(output_scale > 0.0 && output_scale.is_finite()) {
            return Err(Error::config("system.p_max", "output scale must be positive"));
        }
        match structure {
            Structure::PerUser if !net.layers.is_empty() && (net.input_dim() != 1 || net.output_dim() != 1) => {
                return Err(Error::config(
                    "policy.structure",
                    "per-user networks must be single-input single-output",
                ))
            }
            Structure::Joint
                if !net.layers.is_empty() && (net.input_dim() != n_users || net.output_dim() != n_users) =>
            {
                return Err(Error::config(
                    "policy.structure",
                    "joint network must map n_users inputs to n_users outputs",
                ))
            }
            _ => {}
        }
        Ok(Self {
            net,
            structure,
            n_users,
            output_scale,
        })
    }

    /// `n_users` independent `1 -> hidden -> 1` networks.
    pub fn per_user(n_users: usize, hidden: &[usize], output_scale: f64) -> Result<Self> {
        Self::new(Network::mlp(1, hidden, 1)?, Structure::PerUser, n_users, output_scale)
    }

    /// One `n_users -> hidden -> n_users` network.
    pub fn joint(n_users: usize, hidden: &[usize], output_scale: f64) -> Result<Self> {
        Self::new(
            Network::mlp(n_users, hidden, n_users)?,
            Structure::Joint,
            n_users,
            output_scale,
        )
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn structure(&self) -> Structure {
        self.structure
    }

    pub fn output_scale(&self) -> f64 {
        self.output_scale
    }

    /// Parameter range owned by user `i` under the per-user structure.
    pub fn user_block(&self, i: usize) -> std::ops::Range<usize> {
        let k = self.net.param_count();
        i * k..(i + 1) * k
    }
}

impl Policy for DnnPolicy {
    fn theta_dim(&self) -> usize {
        match self.structure {
            Structure::PerUser => self.n_users * self.net.param_count(),
            Structure::Joint => self.net.param_count(),
        }
    }

    fn input_dim(&self) -> usize {
        self.n_users
    }

    fn output_dim(&self) -> usize {
        self.n_users
    }

    fn forward_into(&self, h: &[f64], theta: &[f64], out: &mut [f64]) -> Result<()> {
        Error::check_dim("policy parameters", self.theta_dim(), theta.len())?;
        Error::check_dim("fading vector", self.n_users, h.len())?;
        Error::check_dim("allocation", self.n_users, out.len())?;
        if self.net.layers.is_empty() {
            out.fill(0.0);
            return Ok(());
        }
        match self.structure {
            Structure::PerUser => {
                let k = self.net.param_count();
                for (i, o) in out.iter_mut().enumerate() {
                    let mut y = [0.0];
                    self.net.eval(&h[i..=i], &theta[i * k..(i + 1) * k], &mut y);
                    *o = self.output_scale * y[0];
                }
            }
            Structure::Joint => {
                self.net.eval(h, theta, out);
                for o in out.iter_mut() {
                    *o *= self.output_scale;
                }
            }
        }
        Ok(())
    }
}

/// Allocation `p = clamp(theta, lower, upper)`, ignoring the fading state.
/// With infinite bounds this is the identity map.
#[derive(Debug, Clone, PartialEq)]
pub struct ClampPolicy {
    lower: Vec<f64>,
    upper: Vec<f64>,
    input_dim: usize,
}

impl ClampPolicy {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, input_dim: usize) -> Self {
        assert_eq!(lower.len(), upper.len());
        Self {
            lower,
            upper,
            input_dim,
        }
    }

    pub fn identity(dim: usize, input_dim: usize) -> Self {
        Self::new(vec![f64::NEG_INFINITY; dim], vec![f64::INFINITY; dim], input_dim)
    }
}

impl Policy for ClampPolicy {
    fn theta_dim(&self) -> usize {
        self.lower.len()
    }

    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn output_dim(&self) -> usize {
        self.lower.len()
    }

    fn forward_into(&self, h: &[f64], theta: &[f64], out: &mut [f64]) -> Result<()> {
        Error::check_dim("policy parameters", self.theta_dim(), theta.len())?;
        Error::check_dim("fading vector", self.input_dim, h.len())?;
        for (((o, &t), &lo), &hi) in out.iter_mut().zip(theta).zip(&self.lower).zip(&self.upper) {
            *o = t.clamp(lo, hi);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitScheme {
    #[default]
    Zeros,
    /// Seeded uniform on `(-0.1, 0.1)`.
    Uniform,
}

pub fn init_theta(dim: usize, scheme: InitScheme, stream: &mut Stream) -> Vec<f64> {
    match scheme {
        InitScheme::Zeros => vec![0.0; dim],
        InitScheme::Uniform => (0..dim).map(|_| stream.uniform_in(-0.1, 0.1)).collect(),
    }
}
