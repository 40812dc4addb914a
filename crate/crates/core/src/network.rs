//! Feedforward ReLU-type networks with output truncation.
//!
//! A network with depth `L` and widths `(p_0, …, p_{L+1})` stores all of its
//! parameters in one flat vector, ordered
//! `(vec(W_1), b_1, …, vec(W_{L+1}), b_{L+1})` where `W_j` is a
//! `p_{j-1} × p_j` matrix, `vec` stacks its columns, and layer `j` maps
//! `x ↦ W_jᵀ x + b_j`. Column `k` of `W_j` therefore holds the incoming
//! weights of unit `k`. Layer matrices are exposed as column-major views into
//! the flat vector, so flattening and loading are copies.

use std::fmt::Write as _;
use std::ops::{Deref, DerefMut};
use std::str::FromStr;

use ndarray::{
    linalg::general_mat_mul, Array2, ArrayView1, ArrayView2, ArrayViewMut1, ArrayViewMut2, Axis, ShapeBuilder,
};
use rand::Rng;

use crate::error::{Error, Result};
use crate::penalty::{l0_norm, linf_norm};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
    Sigmoid,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
        }
    }

    /// Derivative as a function of the pre-activation. ReLU uses 0 at 0.
    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Activation::Sigmoid => {
                let s = 1.0 / (1.0 + (-z).exp());
                s * (1.0 - s)
            }
        }
    }

    /// Lipschitz constant `C_σ`.
    pub fn lipschitz(self) -> f64 {
        match self {
            Activation::Relu | Activation::Tanh => 1.0,
            Activation::Sigmoid => 0.25,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            "sigmoid" => Ok(Activation::Sigmoid),
            other => Err(Error::Config(format!("unknown activation `{other}`"))),
        }
    }
}

/// Constraint tuple `(L, N, B, F, S)` of a network class.
#[derive(Debug, Clone, PartialEq)]
pub struct Architecture {
    widths: Vec<usize>,
    pub weight_bound: f64,
    pub output_bound: f64,
    pub sparsity: Option<usize>,
}

impl Architecture {
    /// Full width vector `(p_0, …, p_{L+1})`; the last entry must be 1.
    pub fn from_widths(
        widths: Vec<usize>,
        weight_bound: f64,
        output_bound: f64,
        sparsity: Option<usize>,
    ) -> Result<Self> {
        let arch = Architecture { widths, weight_bound, output_bound, sparsity };
        arch.validate()?;
        Ok(arch)
    }

    /// `depth` hidden layers of `width` units on a `input_dim`-dimensional input.
    pub fn uniform(input_dim: usize, depth: usize, width: usize, weight_bound: f64, output_bound: f64) -> Result<Self> {
        let mut widths = Vec::with_capacity(depth + 2);
        widths.push(input_dim);
        widths.extend(std::iter::repeat_n(width, depth));
        widths.push(1);
        Self::from_widths(widths, weight_bound, output_bound, None)
    }

    pub fn with_sparsity(mut self, s: usize) -> Self {
        self.sparsity = Some(s);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.widths.len() < 3 {
            return Err(Error::Config("depth must be at least 1".into()));
        }
        if self.widths.contains(&0) {
            return Err(Error::Config("all widths must be positive".into()));
        }
        if *self.widths.last().unwrap() != 1 {
            return Err(Error::Config("output width must be 1".into()));
        }
        if !(self.weight_bound > 0.0) {
            return Err(Error::Config("weight bound B must be positive".into()));
        }
        if !(self.output_bound > 0.0) {
            return Err(Error::Config("output bound F must be positive".into()));
        }
        Ok(())
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    /// Number of hidden layers `L`.
    pub fn depth(&self) -> usize {
        self.widths.len() - 2
    }

    /// Largest hidden width `N`.
    pub fn width(&self) -> usize {
        self.widths[1..=self.depth()].iter().copied().max().unwrap_or(0)
    }

    pub fn param_count(&self) -> usize {
        self.widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    /// Effective sparsity level: `S` when set, otherwise the parameter count.
    pub fn sparsity_or_dense(&self) -> usize {
        self.sparsity.unwrap_or_else(|| self.param_count())
    }

    /// Offsets of `(W_j, b_j)` inside the flat parameter vector.
    fn layout(&self) -> Vec<LayerSlot> {
        let mut offset = 0;
        self.widths
            .windows(2)
            .map(|w| {
                let slot = LayerSlot { fan_in: w[0], fan_out: w[1], weights: offset, bias: offset + w[0] * w[1] };
                offset = slot.bias + w[1];
                slot
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LayerSlot {
    pub fan_in: usize,
    pub fan_out: usize,
    pub weights: usize,
    pub bias: usize,
}

impl LayerSlot {
    pub fn weights<'a>(&self, flat: &'a [f64]) -> ArrayView2<'a, f64> {
        ArrayView2::from_shape((self.fan_in, self.fan_out).f(), &flat[self.weights..self.bias]).expect("layer layout")
    }

    pub fn bias<'a>(&self, flat: &'a [f64]) -> ArrayView1<'a, f64> {
        ArrayView1::from(&flat[self.bias..self.bias + self.fan_out])
    }

    /// Mutable views of `(W_j, b_j)` inside `flat`.
    pub fn split_mut<'a>(&self, flat: &'a mut [f64]) -> (ArrayViewMut2<'a, f64>, ArrayViewMut1<'a, f64>) {
        let (w, b) = flat[self.weights..self.bias + self.fan_out].split_at_mut(self.bias - self.weights);
        (ArrayViewMut2::from_shape((self.fan_in, self.fan_out).f(), w).expect("layer layout"), ArrayViewMut1::from(b))
    }
}

/// Flat parameter vector `θ(h)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamVector(pub Vec<f64>);

impl Deref for ParamVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for ParamVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(v: Vec<f64>) -> Self {
        ParamVector(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitScheme {
    Zero,
    /// Weights `U[-√(6/(fan_in+fan_out)), +√(6/(fan_in+fan_out))]`, biases zero.
    GlorotUniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    arch: Architecture,
    activation: Activation,
    params: ParamVector,
    layout: Vec<LayerSlot>,
}

impl Network {
    pub fn new(arch: Architecture, init: InitScheme, seed: u64) -> Result<Self> {
        Self::with_activation(arch, Activation::Relu, init, seed)
    }

    pub fn with_activation(arch: Architecture, activation: Activation, init: InitScheme, seed: u64) -> Result<Self> {
        arch.validate()?;
        let layout = arch.layout();
        let mut params = vec![0.0; arch.param_count()];
        if init == InitScheme::GlorotUniform {
            let mut rng = rng_from_seed(seed);
            for slot in &layout {
                let limit = (6.0 / (slot.fan_in + slot.fan_out) as f64).sqrt();
                for w in &mut params[slot.weights..slot.bias] {
                    *w = rng.gen_range(-limit..=limit);
                }
            }
        }
        Ok(Network { arch, activation, params: ParamVector(params), layout })
    }

    pub fn from_params(arch: Architecture, activation: Activation, params: ParamVector) -> Result<Self> {
        let net = Network::with_activation(arch, activation, InitScheme::Zero, 0)?;
        net.load_params(params)
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn params(&self) -> &ParamVector {
        &self.params
    }

    pub(crate) fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub(crate) fn layout(&self) -> &[LayerSlot] {
        &self.layout
    }

    pub fn num_layers(&self) -> usize {
        self.layout.len()
    }

    /// `(W_j, b_j)` for `j` in `0..=depth` (zero-based).
    pub fn layer(&self, j: usize) -> (ArrayView2<'_, f64>, ArrayView1<'_, f64>) {
        let slot = &self.layout[j];
        (slot.weights(&self.params), slot.bias(&self.params))
    }

    pub fn flatten_params(&self) -> ParamVector {
        self.params.clone()
    }

    pub fn load_params(&self, theta: ParamVector) -> Result<Network> {
        if theta.len() != self.arch.param_count() {
            return Err(Error::Shape { expected: self.arch.param_count(), got: theta.len() });
        }
        Ok(Network { arch: self.arch.clone(), activation: self.activation, params: theta, layout: self.layout.clone() })
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        let d = self.arch.input_dim();
        if x.len() != d {
            return Err(Error::Shape { expected: d, got: x.len() });
        }
        let mut a = x.to_vec();
        let last = self.layout.len() - 1;
        for (j, slot) in self.layout.iter().enumerate() {
            let w = slot.weights(&self.params);
            let mut z = slot.bias(&self.params).to_vec();
            for (k, zk) in z.iter_mut().enumerate() {
                *zk += w.column(k).iter().zip(&a).map(|(wi, ai)| wi * ai).sum::<f64>();
            }
            if j < last {
                z.iter_mut().for_each(|v| *v = self.activation.apply(*v));
            }
            a = z;
        }
        Ok(self.truncate(a[0]))
    }

    /// Raw (untruncated) outputs on a batch whose rows are inputs.
    pub fn forward_raw_batch(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        let d = self.arch.input_dim();
        if x.ncols() != d {
            return Err(Error::Shape { expected: d, got: x.ncols() });
        }
        let last = self.layout.len() - 1;
        let mut a: Array2<f64> = x.to_owned();
        for (j, slot) in self.layout.iter().enumerate() {
            let mut z = Array2::<f64>::zeros((x.nrows(), slot.fan_out));
            z += &slot.bias(&self.params);
            general_mat_mul(1.0, &a, &slot.weights(&self.params), 1.0, &mut z);
            if j < last {
                let act = self.activation;
                z.mapv_inplace(|v| act.apply(v));
            }
            a = z;
        }
        Ok(a.index_axis(Axis(1), 0).to_vec())
    }

    /// Truncated outputs on a batch whose rows are inputs.
    pub fn forward_batch(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        let mut out = self.forward_raw_batch(x)?;
        out.iter_mut().for_each(|v| *v = self.truncate(*v));
        Ok(out)
    }

    #[inline]
    pub fn truncate(&self, v: f64) -> f64 {
        v.clamp(-self.arch.output_bound, self.arch.output_bound)
    }

    /// Upper bound on the ∞-norm Lipschitz constant of `x ↦ h(x)`:
    /// `C_σ^L · Π_j max_k Σ_i |W_j[i,k]|`.
    pub fn lipschitz_upper_bound(&self) -> f64 {
        let layers = self.layout.len() as i32;
        let prod: f64 = (0..self.layout.len())
            .map(|j| {
                let (w, _) = self.layer(j);
                w.columns().into_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
            })
            .product();
        prod * self.activation.lipschitz().powi(layers - 1)
    }

    pub fn check_constraints(&self, arch: &Architecture) -> ConstraintReport {
        let depth = self.arch.depth();
        let width = self.arch.width();
        let sup_norm = linf_norm(&self.params);
        let l0 = l0_norm(&self.params);
        ConstraintReport {
            depth,
            depth_ok: depth <= arch.depth(),
            width,
            width_ok: width <= arch.width(),
            sup_norm,
            sup_norm_ok: sup_norm <= arch.weight_bound,
            l0,
            sparsity_ok: arch.sparsity.map(|s| l0 <= s),
        }
    }

    /// Clamps every parameter into `[-B, B]`.
    pub fn project_sup_norm(&self, bound: f64) -> Network {
        let mut out = self.clone();
        out.params.iter_mut().for_each(|v| *v = v.clamp(-bound, bound));
        out
    }

    /// Text serialization: a header line
    /// `spdnn-net v1 <d> <L> <p_1 … p_L> <B> <F>` followed by one parameter
    /// per line in flat order with 17 significant digits. Non-ReLU networks
    /// append an `act=<name>` token to the header.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        write!(s, "spdnn-net v1 {} {}", self.arch.input_dim(), self.arch.depth()).unwrap();
        for w in &self.arch.widths[1..=self.arch.depth()] {
            write!(s, " {w}").unwrap();
        }
        write!(s, " {:e} {:e}", self.arch.weight_bound, self.arch.output_bound).unwrap();
        if self.activation != Activation::Relu {
            write!(s, " act={}", self.activation.name()).unwrap();
        }
        s.push('\n');
        for v in self.params.iter() {
            writeln!(s, "{v:.16e}").unwrap();
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Network> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty network file".into() })?;
        let perr = |msg: &str| Error::Parse { line: 1, msg: msg.to_string() };
        let tokens: Vec<&str> = header.split_whitespace().collect();
        if tokens.len() < 4 || tokens[0] != "spdnn-net" || tokens[1] != "v1" {
            return Err(perr("expected `spdnn-net v1` header"));
        }
        let int = |t: &str| t.parse::<usize>().map_err(|_| perr(&format!("bad integer `{t}`")));
        let real = |t: &str| t.parse::<f64>().map_err(|_| perr(&format!("bad number `{t}`")));
        let d = int(tokens[2])?;
        let depth = int(tokens[3])?;
        if tokens.len() < 6 + depth {
            return Err(perr("header too short"));
        }
        let mut widths = vec![d];
        for t in &tokens[4..4 + depth] {
            widths.push(int(t)?);
        }
        widths.push(1);
        let b = real(tokens[4 + depth])?;
        let f = real(tokens[5 + depth])?;
        let mut activation = Activation::Relu;
        for extra in &tokens[6 + depth..] {
            match extra.strip_prefix("act=") {
                Some(name) => activation = name.parse()?,
                None => return Err(perr(&format!("unexpected header token `{extra}`"))),
            }
        }
        let arch = Architecture::from_widths(widths, b, f, None)?;
        let mut params = Vec::with_capacity(arch.param_count());
        for (i, line) in lines {
            let v = line
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse { line: i + 1, msg: format!("bad parameter `{}`", line.trim()) })?;
            params.push(v);
        }
        Network::from_params(arch, activation, ParamVector(params))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintReport {
    pub depth: usize,
    pub depth_ok: bool,
    pub width: usize,
    pub width_ok: bool,
    pub sup_norm: f64,
    pub sup_norm_ok: bool,
    pub l0: usize,
    /// `None` when the reference architecture has no sparsity cap.
    pub sparsity_ok: Option<bool>,
}

impl ConstraintReport {
    pub fn all_ok(&self) -> bool {
        self.depth_ok && self.width_ok && self.sup_norm_ok && self.sparsity_ok.unwrap_or(true)
    }
}
